fn main() {
    let verbose = std::env::args().filter(|a| a == "-v" || a == "--verbose").count();
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    std::process::exit(formnav::cli::run(std::env::args_os()));
}
