"""
Adam update rule on plain numpy parameter vectors.
"""
import numpy as np


class AdamOptimizer:
    """
    Adaptive moment estimation for a single parameter vector.

    Args:
        size: Number of parameters
        lr: Step size
        beta1: Decay of the first-moment estimate
        beta2: Decay of the second-moment estimate
        eps: Denominator offset
    """

    def __init__(self, size: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(size)
        self.v = np.zeros(size)

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """
        Return the parameters after one update.

        Args:
            theta: Current parameters
            grad: Gradient of the loss at theta

        Returns:
            Updated parameters (new array)
        """
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad ** 2
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
