#include <inttypes.h>
#include <stdio.h>
#include "leaky_index.h"

int main(void) {
  int32_t _key = get_key();
  int32_t t[2];
  for (uint32_t _i = 0; _i < 2U; _i++) {
    KRML_ANNOT_WRITE(t + _i);
    t[_i] = 5;
  }
  KRML_ANNOT_READ((t + (_key & 1)));
  int32_t v = t[(_key & 1)];
  printf("%" PRId32 "\n", (int32_t)v);
  return 0;
}
