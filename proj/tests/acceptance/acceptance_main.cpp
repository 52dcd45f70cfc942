#include <cstring>
#include <iostream>
#include <string>

#include "acceptance.hpp"

int main(int argc, char** argv) {
    modify::acceptance::Options options;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--work-dir" && i + 1 < argc) {
            options.work_dir = argv[++i];
        } else if (arg == "--jobs" && i + 1 < argc) {
            options.jobs = std::stoul(argv[++i]);
        } else if (arg == "--only" && i + 1 < argc) {
            std::string list = argv[++i];
            std::size_t pos = 0;
            while (pos < list.size()) {
                const auto comma = list.find(',', pos);
                options.only.push_back(std::stoi(list.substr(pos, comma - pos)));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
        } else {
            std::cerr << "usage: " << argv[0] << " [--work-dir DIR] [--jobs N] [--only 1,2,...]\n";
            return 2;
        }
    }
    return modify::acceptance::run_all(options) == 0 ? 0 : 1;
}
