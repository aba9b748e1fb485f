fn main() {
    std::process::exit(nnjump::cli::run(std::env::args_os()));
}
