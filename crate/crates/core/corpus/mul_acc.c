// SPDX-License-Identifier: Apache-2.0
// Multiply-accumulate that only adds when the new-data flag is set.
void mul_acc(bool nd[16], int12_t A[16], int12_t B[16], int32_t P[16]) {
  int32_t sum = 0;
  for (int i = 0; i < 16; i++) {
    if (nd[i]) {
      sum = sum + A[i] * B[i];
    }
    P[i] = sum;
  }
}
