#pragma once

#include <gtest/gtest.h>

#include "cretok/error.hpp"

#define EXPECT_CRETOK_ERROR(statement, expected)                                              \
  do {                                                                                        \
    try {                                                                                     \
      statement;                                                                              \
      ADD_FAILURE() << "expected " << ::cretok::to_string(expected) << ", nothing thrown";   \
    } catch (const ::cretok::Error& e__) {                                                    \
      EXPECT_EQ(::cretok::to_string(e__.code()), ::cretok::to_string(expected)) << e__.what(); \
    }                                                                                         \
  } while (false)
