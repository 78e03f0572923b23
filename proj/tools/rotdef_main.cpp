#include "rotdef/cli.hpp"

int main(int argc, char** argv) {
    return rotdef::run_cli(argc, argv);
}
