fn main() {
    std::process::exit(objlog::cli::main_with_args(std::env::args()));
}
