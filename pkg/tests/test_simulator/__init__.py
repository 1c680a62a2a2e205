# simulator tests package
