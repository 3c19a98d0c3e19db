fn main() {
    std::process::exit(debranges::cli::main_with_args(std::env::args_os()));
}
