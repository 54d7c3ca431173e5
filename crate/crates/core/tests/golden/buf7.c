#include <inttypes.h>
#include <stdio.h>
#include "buf7.h"

int main(void) {
  int32_t x[2] = { 0 };
  KRML_ANNOT_WRITE(x + 0);
  KRML_ANNOT_WRITE(x + 1);
  KRML_ANNOT_WRITE((x + 1));
  x[1] = 7;
  KRML_ANNOT_READ((x + 1));
  int32_t y = x[1];
  printf("%" PRId32 "\n", (int32_t)y);
  return 0;
}
