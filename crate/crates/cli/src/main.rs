fn main() {
    std::process::exit(fried_cli::main_with_args(std::env::args_os()));
}
