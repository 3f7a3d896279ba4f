"""Stand-in for the ``cython`` module when Cython is not installed.

Only the names used by the kernel are provided; every decorator is a no-op
and every type is a plain Python type, so the kernel runs interpreted.
"""


class _Type:
    def __init__(self, py):
        self.py = py

    def __getitem__(self, _):
        return self

    def __call__(self, *a):
        return self.py(*a)


compiled = False
longlong = _Type(int)
Py_ssize_t = _Type(int)
int = _Type(int)  # noqa: A001
bint = _Type(bool)
void = _Type(lambda *a: None)


def typedef(t):
    return t


def declare(t=None, value=None, **kw):
    return value


def _identity(f=None, *a, **kw):
    if callable(f):
        return f
    return lambda g: g


cclass = cfunc = ccall = inline = final = _identity
boundscheck = wraparound = cdivision = initializedcheck = locals = _identity
