fn main() {
    std::process::exit(usmo::cli::main_with_args(std::env::args_os()));
}
