fn main() {
    std::process::exit(stftpr::cli::main_with_args(std::env::args_os()));
}
