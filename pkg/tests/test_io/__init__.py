# io tests package
