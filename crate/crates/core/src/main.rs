fn main() {
    std::process::exit(kpagg::cli::main_with_args(std::env::args_os()));
}
