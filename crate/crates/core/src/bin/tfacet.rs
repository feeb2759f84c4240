fn main() {
    std::process::exit(tfacet::cli::main_with_args(std::env::args_os()));
}
