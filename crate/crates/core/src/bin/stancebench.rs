fn main() {
    std::process::exit(stancebench::cli::main_with_args(std::env::args_os()));
}
