fn main() {
    std::process::exit(neuroprune::cli::run(std::env::args_os()));
}
