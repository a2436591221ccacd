fn main() {
    std::process::exit(speccoh::cli::run(std::env::args_os()));
}
