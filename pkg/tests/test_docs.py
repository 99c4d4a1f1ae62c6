import doctest

import merkle_pseudonym


def test_package_docstring_example():
    result = doctest.testmod(merkle_pseudonym)
    assert result.attempted > 0 and result.failed == 0
