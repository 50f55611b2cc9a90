fn main() {
    std::process::exit(geomatch::cli::main_with_args(std::env::args_os().collect()));
}
