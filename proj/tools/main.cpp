#include "cli_app.hpp"

int main(int argc, char** argv) { return wrfcm::cli::run(argc, argv); }
