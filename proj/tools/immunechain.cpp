#include <immunechain/cli.hpp>

int main(int argc, char** argv) { return immunechain::cli::run_cli(argc, argv); }
