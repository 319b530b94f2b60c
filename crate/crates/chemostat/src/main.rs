fn main() {
    std::process::exit(chemostat::cli::run(std::env::args_os()));
}
