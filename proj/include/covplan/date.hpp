/*
* Copyright (C) 2026 covplan contributors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#pragma once

#include "covplan/error.hpp"

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

namespace covplan
{

/// Calendar day. Arithmetic is in whole days.
class Date
{
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days)
        : m_days(days)
    {
    }
    constexpr Date(int y, unsigned m, unsigned d)
        : m_days(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}})
    {
    }

    /// Strict YYYY-MM-DD.
    static Date parse(std::string_view text)
    {
        auto fail = [&] {
            return Error(ErrorCode::invalid_date, "invalid ISO-8601 date '" + std::string(text) + "'");
        };
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
            throw fail();
        }
        auto number = [&](std::size_t pos, std::size_t len) {
            int value = 0;
            auto first = text.data() + pos;
            auto [ptr, ec] = std::from_chars(first, first + len, value);
            if (ec != std::errc{} || ptr != first + len) {
                throw fail();
            }
            return value;
        };
        std::chrono::year_month_day ymd{std::chrono::year{number(0, 4)}, std::chrono::month(unsigned(number(5, 2))),
                                        std::chrono::day(unsigned(number(8, 2)))};
        if (!ymd.ok()) {
            throw fail();
        }
        return Date(std::chrono::sys_days{ymd});
    }

    std::string to_string() const
    {
        std::chrono::year_month_day ymd{m_days};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()));
        return buf;
    }

    constexpr Date operator+(int days) const
    {
        return Date(m_days + std::chrono::days{days});
    }
    constexpr Date operator-(int days) const
    {
        return Date(m_days - std::chrono::days{days});
    }
    /// Signed day difference.
    constexpr int operator-(Date other) const
    {
        return int((m_days - other.m_days).count());
    }

    constexpr auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days m_days{};
};

} // namespace covplan
