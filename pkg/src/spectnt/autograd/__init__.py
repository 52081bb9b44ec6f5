from spectnt.autograd import functional
from spectnt.autograd.gradcheck import GradCheckReport, gradcheck
from spectnt.autograd.tensor import GradTape, Tensor, TapeRecord

__all__ = ["GradCheckReport", "GradTape", "TapeRecord", "Tensor", "functional", "gradcheck"]
