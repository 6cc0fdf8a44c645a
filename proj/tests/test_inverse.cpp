#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "rlab/errors.hpp"
#include "rlab/inverse.hpp"
#include "rlab/lattice.hpp"
#include "support.hpp"

using namespace rlab;
using rlab::test::random_point;

namespace {

// k1 - k2 in A Z^m  <=>  adj(A)(k1 - k2) = 0 mod det A.
bool same_coset(const IntMatrix& A, const IntVector& a, const IntVector& b) {
  const long long d = int_det(A);
  const IntVector t = adjugate(A) * (a - b);
  for (int i = 0; i < t.size(); ++i)
    if (t[i] % d != 0) return false;
  return true;
}

}  // namespace

TEST_CASE("coset representatives are a transversal of Z^m / A Z^m") {
  for (const IntMatrix& A :
       {catalog::matrix({{2}}), catalog::matrix({{2, 1}, {2, 2}}), catalog::matrix({{2, 2}, {2, 3}}),
        catalog::matrix({{2, 0, 0}, {0, 2, 2}, {0, 2, 3}}), catalog::matrix({{3, 1}, {1, 2}}),
        catalog::matrix({{-3, 1}, {2, 2}})}) {
    const auto c = coset_representatives(A);
    CHECK(static_cast<long long>(c.size()) == std::abs(int_det(A)));
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) CHECK_FALSE(same_coset(A, c.reps[i], c.reps[j]));
    // Every point of a small box falls in one of the cosets.
    for (long long a = -3; a <= 3; ++a)
      for (long long b = -3; b <= 3; ++b) {
        IntVector k = IntVector::Zero(A.rows());
        k[0] = a;
        if (A.rows() > 1) k[1] = b;
        int hits = 0;
        for (const auto& r : c.reps) hits += same_coset(A, k, r) ? 1 : 0;
        CHECK(hits == 1);
      }
  }
}

TEST_CASE("doubling map preimages of 0 are 0 and 1/2") {
  const auto pre = preimages(catalog::doubling_map(), Point{0.0});
  REQUIRE(pre.size() == 2);
  CHECK(pre[0].point[0] == 0.0);
  CHECK(pre[1].point[0] == 0.5);
}

TEST_CASE("preimages map back, are distinct and number d") {
  for (const System& s : test::catalogue()) {
    const InverseBranches inv(s);
    for (std::uint64_t i = 0; i < 200; ++i) {
      const Point x = random_point(s, 21, i);
      const auto pre = inv.preimages(x);
      REQUIRE(static_cast<int>(pre.size()) == s.degree());
      for (std::size_t a = 0; a < pre.size(); ++a) {
        CHECK(distance(s, apply(s, pre[a].point), x) <= 1e-9);
        CHECK(pre[a].label == static_cast<int>(a));
        for (std::size_t b = a + 1; b < pre.size(); ++b)
          CHECK(distance(s, pre[a].point, pre[b].point) > 1e-6);
      }
    }
  }
}

TEST_CASE("single branch agrees with the full preimage set") {
  for (const System& s : test::catalogue()) {
    const InverseBranches inv(s);
    const Point x = random_point(s, 22, 0);
    const auto pre = inv.preimages(x);
    for (const auto& p : pre) CHECK(distance(s, inv.branch(x, p.label), p.point) < 1e-12);
  }
}

TEST_CASE("toral preimages are A^-1 (x + k) for the coset representatives") {
  const System s = catalog::toral_2223();
  const Point x{0.37, 0.81};
  const auto pre = preimages(s, x);
  const Mat Ainv = s.matrix_real().inverse();
  std::set<std::pair<long, long>> got, want;
  for (const auto& p : pre) got.insert({std::lround(p.point[0] * 1e9), std::lround(p.point[1] * 1e9)});
  for (const auto& k : coset_representatives(s.matrix()).reps) {
    Vec v = Ainv * (x.vec() + k.cast<double>());
    want.insert({std::lround(mod1(v[0]) * 1e9), std::lround(mod1(v[1]) * 1e9)});
  }
  CHECK(got == want);
}

TEST_CASE("doubling tree leaves are the dyadic points") {
  const int n = 10;
  const auto tree = preimage_tree(catalog::doubling_map(), Point{0.0}, n);
  REQUIRE(tree.levels.size() == static_cast<std::size_t>(n + 1));
  std::set<long long> leaves;
  for (const auto& nd : tree.levels[n]) {
    const double scaled = nd.point[0] * (1 << n);
    CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-9));
    leaves.insert(std::llround(scaled));
  }
  CHECK(leaves.size() == static_cast<std::size_t>(1 << n));
}

TEST_CASE("tree levels have d^k nodes, parents map children forward, weights split evenly") {
  for (const System& s : {catalog::toral_2122(), catalog::example3_product(),
                          catalog::example4_perturbed(0.02)}) {
    const auto tree = preimage_tree(s, random_point(s, 23, 0), 4);
    CHECK(tree.pruned == 0);
    std::size_t expect = 1;
    for (std::size_t l = 0; l < tree.levels.size(); ++l) {
      CHECK(tree.levels[l].size() == expect);
      double w = 0.0;
      for (const auto& nd : tree.levels[l]) {
        w += nd.weight;
        if (l > 0) {
          const auto& par = tree.levels[l - 1][static_cast<std::size_t>(nd.parent)];
          CHECK(distance(s, apply(s, nd.point), par.point) < 1e-9);
        }
      }
      CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
      expect *= static_cast<std::size_t>(s.degree());
    }
  }
}

TEST_CASE("tree order does not depend on the thread count") {
  const System s = catalog::example4_perturbed(0.02);
  TreeOptions a, b;
  b.threads = 4;
  const auto t1 = preimage_tree(s, Point{1.0, 0.0, 0.3, 0.6}, 5, a);
  const auto t4 = preimage_tree(s, Point{1.0, 0.0, 0.3, 0.6}, 5, b);
  REQUIRE(t1.levels.size() == t4.levels.size());
  for (std::size_t l = 0; l < t1.levels.size(); ++l)
    for (std::size_t i = 0; i < t1.levels[l].size(); ++i) {
      CHECK(t1.levels[l][i].point == t4.levels[l][i].point);
      CHECK(t1.levels[l][i].label == t4.levels[l][i].label);
    }
}

TEST_CASE("streamed levels equal the stored tree") {
  const System s = catalog::toral_2122();
  const auto tree = preimage_tree(s, Point{0.2, 0.4}, 6);
  int seen = 0;
  for_each_level(s, Point{0.2, 0.4}, 6, {}, [&](int l, const std::vector<TreeNode>& level) {
    CHECK(level.size() == tree.levels[l].size());
    for (std::size_t i = 0; i < level.size(); ++i) CHECK(level[i].point == tree.levels[l][i].point);
    ++seen;
  });
  CHECK(seen == 7);
}

TEST_CASE("budget and basin errors") {
  TreeOptions o;
  o.node_budget = 1000;
  CHECK_THROWS_AS(preimage_tree(catalog::toral_2122(), Point{0.1, 0.1}, 12, o), TreeBudgetExceeded);
  CHECK_THROWS_AS(preimage_tree(catalog::example4_perturbed(0.02), Point{1.3, 0.0, 0.1, 0.1}, 2),
                  OutsideBasin);
}

TEST_CASE("repellor check on the catalogue") {
  for (const System& s : {catalog::doubling_map(), catalog::toral_2122()}) {
    const auto rep = check_repellor(s, 0.05);
    CHECK(rep.ok());
    CHECK(rep.min_count == s.degree());
    CHECK(rep.max_count == s.degree());
  }
  const auto rep = check_repellor(catalog::example4_perturbed(0.02), 0.2);
  CHECK(rep.fraction == 1.0);
  CHECK(rep.min_separation > 0.0);
}

TEST_CASE("backward orbit is a chain of preimages inside U") {
  const System s = catalog::example4_perturbed(0.02);
  const auto orb = backward_orbit(s, Point{1.0, 0.0, 0.4, 0.2}, 50, 3);
  REQUIRE(orb.size() == 51);
  for (std::size_t k = 0; k + 1 < orb.size(); ++k) {
    CHECK(in_region(s, orb[k]));
    CHECK(distance(s, apply(s, orb[k]), orb[k + 1]) < 1e-9);
  }
}
