#pragma once

#include <string_view>
#include <vector>

namespace callsynth {

struct EmbeddedFile {
  std::string_view path;  // relative to data/
  std::string_view contents;
};

const std::vector<EmbeddedFile>& embedded_files();

}  // namespace callsynth
