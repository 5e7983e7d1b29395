#include "cli.h"

int main(int argc, char **argv) {
    return tsc::cli::runCli(std::vector<std::string>(argv + 1, argv + argc));
}
