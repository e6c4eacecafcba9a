fn main() {
    // die quietly on a closed pipe (`mwe info | head`) like other CLI tools
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(mwe_cli::run(std::env::args_os()));
}
