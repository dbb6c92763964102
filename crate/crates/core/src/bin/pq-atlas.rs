fn main() {
    std::process::exit(pq_nodal::cli::run(std::env::args_os()));
}
