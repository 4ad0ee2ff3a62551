#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace oscidecay {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double x);

double parse_double(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

/// Parse "a,b,c" into doubles; throws ValidationError on junk.
std::vector<double> parse_number_list(std::string_view s);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace oscidecay
