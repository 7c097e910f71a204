fn main() {
    std::process::exit(fraudgraph_cli::run(std::env::args_os()));
}
