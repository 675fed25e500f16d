fn main() {
    std::process::exit(rnmvar::cli::main_with_args(std::env::args_os()));
}
