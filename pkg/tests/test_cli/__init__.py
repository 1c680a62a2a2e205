# cli tests package
