fn main() {
    std::process::exit(nlns::cli::main_with_args(std::env::args_os()));
}
