# contact tests package
