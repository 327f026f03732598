/**
 * @file test_support.hpp
 * @brief Small helpers shared by the unit tests
 */
#pragma once

#include <rulerkit/error.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

/// Fails unless `stmt` throws rulerkit::Error with the given code.
#define EXPECT_RK_ERROR(stmt, expected_code)                                                  \
    do {                                                                                      \
        try {                                                                                 \
            stmt;                                                                             \
            ADD_FAILURE() << #stmt " did not throw";                                          \
        } catch (const ::rulerkit::Error& rk_error_) {                                        \
            EXPECT_EQ(::rulerkit::error_code_name(rk_error_.code()),                          \
                      ::rulerkit::error_code_name(expected_code))                             \
                << rk_error_.what();                                                          \
        }                                                                                     \
    } while (0)

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("rulerkit_unit_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}
