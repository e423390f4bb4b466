fn main() -> std::process::ExitCode {
    stokes_kinetic::cli::run()
}
