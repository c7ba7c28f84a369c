#pragma once

#include <gtest/gtest.h>

#include "clp/error.hpp"

// Expects `stmt` to throw clp::Error carrying `expected`.
#define EXPECT_CLP_ERROR(stmt, expected)                                                   \
  do {                                                                                     \
    try {                                                                                  \
      stmt;                                                                                \
      ADD_FAILURE() << "expected " << clp::to_string(expected) << ", nothing was thrown"; \
    } catch (const clp::Error& e_) {                                                       \
      EXPECT_EQ(e_.code(), expected) << e_.what();                                         \
    }                                                                                      \
  } while (0)
