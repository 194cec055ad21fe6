fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SRI_LOG", "warn")).init();
    std::process::exit(sri::cli::run(std::env::args_os()));
}
