// SPDX-License-Identifier: Apache-2.0
// 5-tap constant-coefficient FIR over a sliding window.
void fir(int8_t A[21], int16_t C[17]) {
  int i;
  for (i = 0; i < 17; i = i + 1) {
    C[i] = 3 * A[i] + 5 * A[i + 1] + 7 * A[i + 2] + 9 * A[i + 3] - A[i + 4];
  }
}
