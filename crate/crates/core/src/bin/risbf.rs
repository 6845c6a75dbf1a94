fn main() {
    std::process::exit(ris_mimo::cli::main_with_args(std::env::args_os()));
}
