#pragma once

#include <doctest.h>

#include <functional>
#include <stdexcept>
#include <string>

// Checks that `fn` throws a std::runtime_error whose message mentions `what`.
inline void expect_throw_contains(const std::function<void()>& fn,
                                  const std::string& what) {
    try {
        fn();
        FAIL_CHECK("expected exception mentioning `" << what << "`, none thrown");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        if (msg.find(what) == std::string::npos)
            FAIL_CHECK("exception message `" << msg << "` does not mention `" << what
                                             << "`");
    }
}
