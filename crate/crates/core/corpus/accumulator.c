// SPDX-License-Identifier: Apache-2.0
// Running sum with a loop-carried feedback variable.
void accumulator(int16_t A[16], int32_t* sum) {
  int32_t s = 0;
  for (int i = 0; i < 16; i++) {
    s = s + A[i];
  }
  *sum = s;
}
