#pragma once

#include "ureid/common.hpp"

#include <vector>

namespace ureid {

// d(i,j) = 1 - <f_i, f_j> for unit-norm rows; symmetric, zero diagonal, [0,2].
Mat cosine_distance_matrix(const Mat& features);

// R(i,k) = { j : j in kNN(i,k) and i in kNN(j,k) } + {i}. kNN excludes self and
// breaks distance ties by smaller index, which makes everything downstream
// deterministic. With `expand`, sets are grown by the half-k rule: for q in
// R(i,k), R(q,ceil(k/2)) is unioned in when two thirds of it already overlaps
// R(i,k).
std::vector<std::vector<int>> k_reciprocal_sets(const Mat& dist, int k, bool expand = false);

// d_J(i,j) = 1 - |R(i) n R(j)| / |R(i) u R(j)|; zero diagonal, [0,1].
Mat jaccard_distance_matrix(const std::vector<std::vector<int>>& sets);

}  // namespace ureid
