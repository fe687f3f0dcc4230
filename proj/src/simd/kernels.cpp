#include "physmo/simd/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace physmo::simd {

const Kernels* avx2_table();  // defined in kernels_avx2.cpp

namespace {

bool cpu_has_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Selection {
  const Kernels* table;
  const char* name;
};

Selection select() {
  const Kernels* vec = avx2_table();
  const char* env = std::getenv("PHYSMO_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return {&scalar(), "scalar"};
  if (env && std::strcmp(env, "avx2") == 0 && vec && cpu_has_avx2()) return {vec, "avx2"};
  if (env && std::strcmp(env, "avx2") == 0) return {&scalar(), "scalar"};
  if (vec && cpu_has_avx2()) return {vec, "avx2"};
  return {&scalar(), "scalar"};
}

const Selection& selection() {
  static const Selection s = select();
  return s;
}

}  // namespace

const Kernels* avx2() { return cpu_has_avx2() ? avx2_table() : nullptr; }

const Kernels& active() { return *selection().table; }

const char* active_name() { return selection().name; }

}  // namespace physmo::simd
