fn main() {
    std::process::exit(ladlasso::cli::main_with_args(std::env::args_os()));
}
