fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MTOP_LOG_LEVEL", "warn"))
        .init();
    std::process::exit(mtop::cli::main_with_args(std::env::args_os()));
}
