# estimator tests package
