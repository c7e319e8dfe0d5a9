fn main() {
    std::process::exit(lacunary_maximal::cli::run(std::env::args_os()));
}
