#include <inttypes.h>
#include <stdio.h>
#include "structerase.h"

const int32_t iterations = 100000;

void f(int32_t p_r_left, int32_t p_r_right, int32_t p_n) {
  KRML_ANNOT_BR((int32_t)(p_n < 1));
  if ((int32_t)(p_n < 1)) {
    return;
  } else {
    int32_t r2_left = (int32_t)((uint32_t)p_r_right - (uint32_t)1);
    int32_t r2_right = (int32_t)((uint32_t)p_r_left + (uint32_t)1);
    f(r2_left, r2_right, (int32_t)((uint32_t)p_n - (uint32_t)1));
    return;
  }
}

int main(void) {
  int32_t r_left = 18;
  int32_t r_right = 42;
  f(r_left, r_right, iterations);
  printf("%" PRId32 "\n", (int32_t)(int32_t)((uint32_t)r_left + (uint32_t)r_right));
  return 0;
}
