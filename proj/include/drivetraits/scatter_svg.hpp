#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

namespace drivetraits {

// Minimal predicted-vs-true scatter plot. Output is deterministic for
// identical inputs.
void write_scatter_svg(const std::filesystem::path& file,
                       const Eigen::Ref<const Eigen::VectorXd>& truth,
                       const Eigen::Ref<const Eigen::VectorXd>& predicted,
                       const std::string& title);

}  // namespace drivetraits
