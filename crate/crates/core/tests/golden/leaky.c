#include <inttypes.h>
#include <stdio.h>
#include "leaky.h"

int main(void) {
  int32_t _key = get_key();
  int32_t a[1] = { 0 };
  KRML_ANNOT_WRITE(a + 0);
  int32_t b[1] = { 0 };
  KRML_ANNOT_WRITE(b + 0);
  KRML_ANNOT_BR(_key);
  if (_key) {
    KRML_ANNOT_WRITE((a + 0));
    a[0] = 1;
  } else {
    KRML_ANNOT_WRITE((b + 0));
    b[0] = 1;
  }
  return 0;
}
