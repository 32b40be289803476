#include "bvm/random.hpp"

namespace bvm {

Eigen::VectorXd standard_normal_vector(std::size_t n, std::uint64_t seed) {
  Engine engine(seed);
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  fill_standard_normal(engine, out);
  return out;
}

void fill_standard_normal(Engine& engine, Eigen::Ref<Eigen::VectorXd> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal(engine);
}

}  // namespace bvm
