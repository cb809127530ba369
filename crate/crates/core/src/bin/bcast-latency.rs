fn main() {
    std::process::exit(broadcast_latency::cli::run_from_args(std::env::args_os()));
}
