#include <vector>

#include "polarnn/cli.hpp"

int main(int argc, char** argv) {
    return polarnn::cli_dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
