#pragma once

#include "vclink/stream_stats.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace test {

inline vclink::DataStream words(std::vector<std::uint64_t> w, unsigned width, std::uint32_t type = 1)
{
    vclink::DataStream s;
    s.words = std::move(w);
    s.width = width;
    s.type_id = type;
    return s;
}

inline vclink::DataStream uniform(unsigned width, std::size_t length, std::uint64_t seed)
{
    vclink::StreamSpec s;
    s.width = width;
    s.length = length;
    s.seed = seed;
    return vclink::generate_stream(s);
}

inline vclink::DataStream gaussian(unsigned width, double sigma, double rho, std::size_t length, std::uint64_t seed)
{
    vclink::StreamSpec s;
    s.distribution = vclink::Distribution::Gaussian;
    s.width = width;
    s.sigma = sigma;
    s.rho = rho;
    s.length = length;
    s.seed = seed;
    return vclink::generate_stream(s);
}

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("vclink_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace test
