#pragma once

#include <cstddef>
#include <string_view>

#include "ldcvae/tape.hpp"

namespace ldc {

enum class Activation { identity, relu, tanh, sigmoid };
enum class Reduction { sum_per_row, mean };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

// input[B x I] * weight[I x O] + bias[O], bias broadcast over rows.
Var affine(Var input, Var weight, Var bias);
Var activation(Var input, Activation kind);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var exp(Var a);
Var square(Var a);

// Feature-axis concatenation [B x I] ++ [B x J] -> [B x (I+J)].
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t end);

Var sum(Var a);
Var sum_rows(Var a);  // [B x D] -> [B]
Var mean(Var a);

/// Squared error between two [B x D] tensors. sum_per_row gives the per-sample
/// squared norm [B]; mean gives the scalar mean of those row sums.
Var mse(Var a, Var b, Reduction reduction);

}  // namespace ldc
