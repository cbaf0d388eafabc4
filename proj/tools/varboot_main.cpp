#include <cstdio>
#include <string>
#include <vector>

#include "varboot/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    vb::RunResult r = vb::run(args);
    std::fputs(r.text.c_str(), r.exit_code == 0 ? stdout : stderr);
    return r.exit_code;
}
