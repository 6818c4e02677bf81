fn main() {
    std::process::exit(qgraph::cli::run(std::env::args_os()));
}
