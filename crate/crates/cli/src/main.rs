fn main() {
    std::process::exit(cavity_scatter_cli::main_with_args(std::env::args_os()));
}
